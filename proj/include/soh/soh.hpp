#pragma once

#include "soh/cluster.hpp"
#include "soh/config.hpp"
#include "soh/elastic_net.hpp"
#include "soh/errors.hpp"
#include "soh/features.hpp"
#include "soh/fusion.hpp"
#include "soh/harness.hpp"
#include "soh/io.hpp"
#include "soh/metrics.hpp"
#include "soh/synth.hpp"
#include "soh/text.hpp"
#include "soh/trajectory.hpp"
