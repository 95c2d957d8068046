#pragma once

#include "vrsd/dataset.hpp"
#include "vrsd/dataset_file.hpp"
#include "vrsd/estimators.hpp"
#include "vrsd/precompute.hpp"
#include "vrsd/problem.hpp"
#include "vrsd/reference.hpp"
#include "vrsd/rng.hpp"
#include "vrsd/solvers.hpp"
#include "vrsd/sufficient_decrease.hpp"
#include "vrsd/trace.hpp"
#include "vrsd/bench.hpp"
#include "vrsd/verify.hpp"
