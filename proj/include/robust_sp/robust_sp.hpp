#pragma once

#include "robust_sp/errors.hpp"
#include "robust_sp/numerics.hpp"
#include "robust_sp/process_models.hpp"
#include "robust_sp/dpd.hpp"
#include "robust_sp/estimation.hpp"
#include "robust_sp/asymptotics.hpp"
#include "robust_sp/influence.hpp"
#include "robust_sp/rng.hpp"
#include "robust_sp/simulation.hpp"
