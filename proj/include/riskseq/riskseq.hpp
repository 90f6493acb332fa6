// SPDX-License-Identifier: Apache-2.0
// Umbrella header.
#pragma once

#include "array.hpp"
#include "checkpoint.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "corpus.hpp"
#include "embedding_store.hpp"
#include "encoders.hpp"
#include "error.hpp"
#include "experiment.hpp"
#include "io.hpp"
#include "layers.hpp"
#include "lexicons.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "ops.hpp"
#include "optim.hpp"
#include "random.hpp"
#include "recurrent.hpp"
#include "sampling.hpp"
#include "sequence.hpp"
#include "synthetic.hpp"
#include "text.hpp"
#include "training.hpp"
#include "wilcoxon.hpp"
