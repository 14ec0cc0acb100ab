#pragma once

#include "mpps/candidates.hpp"
#include "mpps/channel.hpp"
#include "mpps/constellation.hpp"
#include "mpps/dataset.hpp"
#include "mpps/detectors.hpp"
#include "mpps/errors.hpp"
#include "mpps/mlp.hpp"
#include "mpps/moment_fit.hpp"
#include "mpps/mpps_detector.hpp"
#include "mpps/ot_transform.hpp"
#include "mpps/real_lattice.hpp"
#include "mpps/rng.hpp"
#include "mpps/sim.hpp"
