// qexchange.hpp: Umbrella header.

#pragma once

#include "qexchange/bessel.hpp"
#include "qexchange/controllability.hpp"
#include "qexchange/dynamics.hpp"
#include "qexchange/effective_control.hpp"
#include "qexchange/grape.hpp"
#include "qexchange/hilbert.hpp"
#include "qexchange/io.hpp"
#include "qexchange/optimize.hpp"
#include "qexchange/parallel.hpp"
#include "qexchange/perturbation.hpp"
#include "qexchange/propagator.hpp"
#include "qexchange/rabi.hpp"
#include "qexchange/types.hpp"

#define QEXCHANGE_VERSION "1.0.0"
