#pragma once

#include "core.hpp"
#include "dataset.hpp"
#include "evaluate.hpp"
#include "genetic_ops.hpp"
#include "harness.hpp"
#include "layered_ea.hpp"
#include "metrics.hpp"
#include "nsga2.hpp"
#include "operators.hpp"
#include "pipeline.hpp"
#include "registry.hpp"
#include "rng.hpp"
#include "synth.hpp"
#include "trace.hpp"
