#pragma once

#include "netdiff/common.hpp"
#include "netdiff/rng.hpp"
#include "netdiff/linalg.hpp"
#include "netdiff/degree.hpp"
#include "netdiff/graph.hpp"
#include "netdiff/hypermoments.hpp"
#include "netdiff/gillespie.hpp"
#include "netdiff/lln.hpp"
#include "netdiff/fclt.hpp"
#include "netdiff/experiments.hpp"
#include "netdiff/parallel.hpp"
#include "netdiff/io.hpp"
