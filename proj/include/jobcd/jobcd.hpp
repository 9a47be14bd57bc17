#pragma once

#include "jobcd/types.hpp"
#include "jobcd/core.hpp"
#include "jobcd/quartic.hpp"
#include "jobcd/subproblem.hpp"
#include "jobcd/objectives.hpp"
#include "jobcd/gs_jobcd.hpp"
#include "jobcd/vr_j_jobcd.hpp"
#include "jobcd/diagnostics.hpp"
#include "jobcd/baselines.hpp"
#include "jobcd/bench.hpp"
