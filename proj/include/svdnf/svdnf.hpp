// SPDX-License-Identifier: MIT
#pragma once

#include "svdnf/bench.hpp"
#include "svdnf/distributions.hpp"
#include "svdnf/dnf.hpp"
#include "svdnf/errors.hpp"
#include "svdnf/grid.hpp"
#include "svdnf/inference.hpp"
#include "svdnf/io.hpp"
#include "svdnf/model.hpp"
#include "svdnf/parallel.hpp"
#include "svdnf/rng.hpp"
#include "svdnf/simulate.hpp"
#include "svdnf/sir.hpp"
#include "svdnf/summation.hpp"
#include "svdnf/transforms.hpp"
