#ifndef AUGSGD_AUGSGD_HPP
#define AUGSGD_AUGSGD_HPP

#include "augsgd/activation.hpp"
#include "augsgd/augmentation.hpp"
#include "augsgd/diagnostics.hpp"
#include "augsgd/error.hpp"
#include "augsgd/graph.hpp"
#include "augsgd/harness.hpp"
#include "augsgd/layered.hpp"
#include "augsgd/network_io.hpp"
#include "augsgd/optimizer.hpp"
#include "augsgd/propagation.hpp"
#include "augsgd/rng.hpp"
#include "augsgd/sampling.hpp"
#include "augsgd/schedule.hpp"

#endif  // AUGSGD_AUGSGD_HPP
