#pragma once

// Everything except the HTTP adapter, which pulls in cpp-httplib; include
// voxkit/http.hpp for that.
#include "voxkit/backends.hpp"
#include "voxkit/bench.hpp"
#include "voxkit/clock.hpp"
#include "voxkit/codec.hpp"
#include "voxkit/core.hpp"
#include "voxkit/datagen.hpp"
#include "voxkit/decimal.hpp"
#include "voxkit/errors.hpp"
#include "voxkit/executors.hpp"
#include "voxkit/io.hpp"
#include "voxkit/judge.hpp"
#include "voxkit/json_io.hpp"
#include "voxkit/orchestrator.hpp"
#include "voxkit/prompt.hpp"
#include "voxkit/tool_space.hpp"
