#pragma once

// Umbrella header. The HTTP layer (annotate_server.hpp) is not included here
// because it pulls in httplib.

#include "rlfkit/error.hpp"
#include "rlfkit/text.hpp"
#include "rlfkit/hash.hpp"
#include "rlfkit/jsonl.hpp"
#include "rlfkit/corpus.hpp"
#include "rlfkit/detect.hpp"
#include "rlfkit/pipeline.hpp"
#include "rlfkit/explain.hpp"
#include "rlfkit/instruct.hpp"
#include "rlfkit/metrics.hpp"
#include "rlfkit/annotate.hpp"
