#pragma once

#include "equisparse/error.hpp"
#include "equisparse/tree.hpp"
#include "equisparse/penalty.hpp"
#include "equisparse/loss.hpp"
#include "equisparse/linalg.hpp"
#include "equisparse/rng.hpp"
#include "equisparse/parallel.hpp"
#include "equisparse/partition.hpp"
#include "equisparse/fista.hpp"
#include "equisparse/path.hpp"
#include "equisparse/tuning.hpp"
#include "equisparse/baselines.hpp"
#include "equisparse/simgen.hpp"
#include "equisparse/inference.hpp"
#include "equisparse/io.hpp"
#include "equisparse/bench.hpp"
