#pragma once

#include "sqpulse/spectrum.hpp"
#include "sqpulse/operators.hpp"
#include "sqpulse/propagator.hpp"
#include "sqpulse/ledger.hpp"
#include "sqpulse/synthesis.hpp"
#include "sqpulse/controllability.hpp"
