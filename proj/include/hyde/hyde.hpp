// Copyright 2026 The hyde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hyde/cache.hpp"
#include "hyde/config.hpp"
#include "hyde/core.hpp"
#include "hyde/encoder.hpp"
#include "hyde/error.hpp"
#include "hyde/eval.hpp"
#include "hyde/generator.hpp"
#include "hyde/index.hpp"
#include "hyde/ingest.hpp"
#include "hyde/pipeline.hpp"
#include "hyde/store.hpp"
