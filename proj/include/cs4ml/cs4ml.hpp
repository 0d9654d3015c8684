#pragma once

#include "cs4ml/error.hpp"
#include "cs4ml/measure.hpp"
#include "cs4ml/polybasis.hpp"
#include "cs4ml/dft.hpp"
#include "cs4ml/operators.hpp"
#include "cs4ml/christoffel.hpp"
#include "cs4ml/lsq.hpp"
#include "cs4ml/imaging.hpp"
#include "cs4ml/cas.hpp"
