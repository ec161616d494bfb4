#ifndef CHROMAMIX_CHROMAMIX_HPP_
#define CHROMAMIX_CHROMAMIX_HPP_

#include "chromamix/checkpoint.hpp"
#include "chromamix/color.hpp"
#include "chromamix/config.hpp"
#include "chromamix/dynamics.hpp"
#include "chromamix/env.hpp"
#include "chromamix/harness.hpp"
#include "chromamix/metrics.hpp"
#include "chromamix/network.hpp"
#include "chromamix/ppo.hpp"
#include "chromamix/reachability.hpp"
#include "chromamix/report.hpp"

#endif  // CHROMAMIX_CHROMAMIX_HPP_
