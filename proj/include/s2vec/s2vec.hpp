#pragma once

#include "baselines.hpp"
#include "cluster.hpp"
#include "config.hpp"
#include "embedder.hpp"
#include "error.hpp"
#include "graph.hpp"
#include "pipeline.hpp"
#include "sampler.hpp"
#include "seq2seq.hpp"
#include "tokenizer.hpp"
#include "trainer.hpp"
