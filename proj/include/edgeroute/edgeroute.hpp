#pragma once

#include "edgeroute/analysis.hpp"
#include "edgeroute/csv.hpp"
#include "edgeroute/edge.hpp"
#include "edgeroute/error.hpp"
#include "edgeroute/features.hpp"
#include "edgeroute/image.hpp"
#include "edgeroute/io.hpp"
#include "edgeroute/manifest.hpp"
#include "edgeroute/metrics.hpp"
#include "edgeroute/pipeline.hpp"
#include "edgeroute/predictors.hpp"
#include "edgeroute/random.hpp"
#include "edgeroute/router.hpp"
#include "edgeroute/stats.hpp"
#include "edgeroute/synth.hpp"
