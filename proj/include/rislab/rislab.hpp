#pragma once

// Umbrella header: the whole laboratory.

#include "rislab/channel.hpp"
#include "rislab/control_plane.hpp"
#include "rislab/core.hpp"
#include "rislab/harness.hpp"
#include "rislab/oracle.hpp"
#include "rislab/protocol.hpp"
#include "rislab/rng.hpp"
#include "rislab/scenario.hpp"
#include "rislab/search.hpp"
#include "rislab/store.hpp"
#include "rislab/transport.hpp"
