#pragma once

// Region feature extraction toolkit: pooling oracles, the attention-weighted
// extractor with analytic gradients, sparse sampling plans, the FLOP cost
// model, weight-distribution metrics and a toy training harness.

#include "regionfeat/attention.hpp"
#include "regionfeat/checkpoint.hpp"
#include "regionfeat/embedding.hpp"
#include "regionfeat/flops.hpp"
#include "regionfeat/geometry.hpp"
#include "regionfeat/gradients.hpp"
#include "regionfeat/metrics.hpp"
#include "regionfeat/parallel.hpp"
#include "regionfeat/pooling.hpp"
#include "regionfeat/pooling_weights.hpp"
#include "regionfeat/sampling.hpp"
#include "regionfeat/tensor.hpp"
#include "regionfeat/train.hpp"
#include "regionfeat/types.hpp"
