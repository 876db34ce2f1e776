#pragma once

// Umbrella header.

#include "stride/core/acquisition.hpp"
#include "stride/core/array.hpp"
#include "stride/core/container.hpp"
#include "stride/core/dataset.hpp"
#include "stride/core/fft.hpp"
#include "stride/editer.hpp"
#include "stride/error.hpp"
#include "stride/eval.hpp"
#include "stride/kmeans.hpp"
#include "stride/linalg.hpp"
#include "stride/pgm.hpp"
#include "stride/pipeline.hpp"
#include "stride/prep.hpp"
#include "stride/sim.hpp"
#include "stride/stats.hpp"
#include "stride/tv.hpp"
