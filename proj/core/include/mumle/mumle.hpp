#pragma once

#include "mumle/errors.hpp"
#include "mumle/estimators.hpp"
#include "mumle/models.hpp"
#include "mumle/montecarlo.hpp"
#include "mumle/pathology.hpp"
#include "mumle/version.hpp"
