#ifndef HAPTO_HAPTO_HPP
#define HAPTO_HAPTO_HPP

#include "hapto/constants.hpp"
#include "hapto/diagnostics.hpp"
#include "hapto/error.hpp"
#include "hapto/grid.hpp"
#include "hapto/initdata.hpp"
#include "hapto/linsolve.hpp"
#include "hapto/model.hpp"
#include "hapto/quadrature.hpp"
#include "hapto/run.hpp"
#include "hapto/runner.hpp"
#include "hapto/scenario.hpp"
#include "hapto/snapshot.hpp"

#endif  // HAPTO_HAPTO_HPP
