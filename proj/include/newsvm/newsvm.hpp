#pragma once

#include "newsvm/common.hpp"
#include "newsvm/features.hpp"
#include "newsvm/impact.hpp"
#include "newsvm/market_data.hpp"
#include "newsvm/param_search.hpp"
#include "newsvm/plots.hpp"
#include "newsvm/studies.hpp"
#include "newsvm/svm.hpp"
#include "newsvm/synth.hpp"
#include "newsvm/textpipe.hpp"
