#pragma once

#include "dlab/commands.hpp"
#include "dlab/config.hpp"
#include "dlab/critic.hpp"
#include "dlab/energy_optimal.hpp"
#include "dlab/episode.hpp"
#include "dlab/flight.hpp"
#include "dlab/guidance.hpp"
#include "dlab/io.hpp"
#include "dlab/policy.hpp"
#include "dlab/rng.hpp"
#include "dlab/sim.hpp"
#include "dlab/stability.hpp"
#include "dlab/svg.hpp"
#include "dlab/trainer.hpp"
#include "dlab/version.hpp"
