#pragma once

#include "lfgen/corpus.hpp"
#include "lfgen/corpus_io.hpp"
#include "lfgen/embedder.hpp"
#include "lfgen/error.hpp"
#include "lfgen/export.hpp"
#include "lfgen/generator.hpp"
#include "lfgen/grouper.hpp"
#include "lfgen/harness.hpp"
#include "lfgen/labeler.hpp"
#include "lfgen/labeling_function.hpp"
#include "lfgen/metrics.hpp"
