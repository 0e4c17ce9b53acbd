#pragma once

#include "sirdcast/data.hpp"
#include "sirdcast/date.hpp"
#include "sirdcast/errors.hpp"
#include "sirdcast/lstm.hpp"
#include "sirdcast/pipeline.hpp"
#include "sirdcast/pso.hpp"
#include "sirdcast/sird.hpp"
#include "sirdcast/weekly_fit.hpp"
