#pragma once

#include "mdiqkd/channel_model.hpp"
#include "mdiqkd/counts_csv.hpp"
#include "mdiqkd/errors.hpp"
#include "mdiqkd/estimation.hpp"
#include "mdiqkd/format.hpp"
#include "mdiqkd/keyrate.hpp"
#include "mdiqkd/lp_solver.hpp"
#include "mdiqkd/photon_number.hpp"
#include "mdiqkd/runner.hpp"
#include "mdiqkd/sampling.hpp"
#include "mdiqkd/scenario.hpp"
