#pragma once

#include "abloc/baselines.hpp"
#include "abloc/config.hpp"
#include "abloc/engine.hpp"
#include "abloc/io.hpp"
#include "abloc/metrics.hpp"
#include "abloc/report.hpp"
#include "abloc/ridge.hpp"
#include "abloc/rng.hpp"
#include "abloc/synth.hpp"
#include "abloc/theory.hpp"
#include "abloc/types.hpp"
