#pragma once

#include "approx_inverse.hpp"
#include "core.hpp"
#include "exact_engine.hpp"
#include "interaction_graph.hpp"
#include "io.hpp"
#include "market_analytics.hpp"
#include "model.hpp"
#include "sampler.hpp"
#include "spin_data.hpp"
