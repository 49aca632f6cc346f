#ifndef STORYSIM_STORYSIM_HPP
#define STORYSIM_STORYSIM_HPP

#include "storysim/bayesnet.hpp"
#include "storysim/bayesnet_fit.hpp"
#include "storysim/bayesnet_sample.hpp"
#include "storysim/csv.hpp"
#include "storysim/entropy.hpp"
#include "storysim/errors.hpp"
#include "storysim/factor.hpp"
#include "storysim/formats.hpp"
#include "storysim/hierarchical.hpp"
#include "storysim/irt.hpp"
#include "storysim/manifest.hpp"
#include "storysim/population.hpp"
#include "storysim/rng.hpp"
#include "storysim/robustness.hpp"
#include "storysim/simulator.hpp"
#include "storysim/stats.hpp"
#include "storysim/trace_stats.hpp"

#endif
