// SPDX-License-Identifier: Apache-2.0
#pragma once

// Umbrella header: distance-preserving anonymized encoding with local
// differential privacy, distance estimation and repair in Hamming space,
// privacy accounting, clustering on anonymized distances, and the
// multi-party simulation harness.

#include "dpbv/bitvector.hpp"
#include "dpbv/clustering.hpp"
#include "dpbv/config.hpp"
#include "dpbv/dataset.hpp"
#include "dpbv/distance.hpp"
#include "dpbv/encoder.hpp"
#include "dpbv/hash_family.hpp"
#include "dpbv/io.hpp"
#include "dpbv/multiparty.hpp"
#include "dpbv/privacy.hpp"
#include "dpbv/rng.hpp"
#include "dpbv/simulate.hpp"
#include "dpbv/synthetic.hpp"
#include "dpbv/version.hpp"
