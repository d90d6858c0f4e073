#pragma once

#include "c2df/config.hpp"
#include "c2df/core.hpp"
#include "c2df/denoiser.hpp"
#include "c2df/dict.hpp"
#include "c2df/grouping.hpp"
#include "c2df/imgio.hpp"
#include "c2df/patching.hpp"
#include "c2df/postproc.hpp"
#include "c2df/sparse.hpp"
