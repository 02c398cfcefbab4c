#pragma once

// Umbrella header for the whole library.

#include "vimm/adam.hpp"
#include "vimm/augment.hpp"
#include "vimm/bpr.hpp"
#include "vimm/dataset.hpp"
#include "vimm/error.hpp"
#include "vimm/evaluate.hpp"
#include "vimm/interaction_matrix.hpp"
#include "vimm/io.hpp"
#include "vimm/metrics.hpp"
#include "vimm/model.hpp"
#include "vimm/parallel.hpp"
#include "vimm/perturb.hpp"
#include "vimm/pipeline.hpp"
#include "vimm/rng.hpp"
#include "vimm/simgraph.hpp"
#include "vimm/split.hpp"
#include "vimm/stats.hpp"
#include "vimm/synthetic.hpp"
#include "vimm/train.hpp"
#include "vimm/virtual_interactions.hpp"
