#pragma once

// Umbrella header: exterior calculus with Lie-algebra values on flat tori,
// connections and curvature in a fixed (possibly holonomy-twisted) gauge,
// the functional defined by a reference connection, degrees of gauge
// transformations on trivial and flat twisted bundles, and a curvature
// residual minimizer over truncated Fourier fields.

#include "flatcs/numeric.hpp"
#include "flatcs/jet.hpp"
#include "flatcs/lie.hpp"
#include "flatcs/scalar_field.hpp"
#include "flatcs/forms.hpp"
#include "flatcs/group_field.hpp"
#include "flatcs/sphere.hpp"
#include "flatcs/degree.hpp"
#include "flatcs/gauge.hpp"
#include "flatcs/flat_bundle.hpp"
#include "flatcs/fourier.hpp"
#include "flatcs/scenario.hpp"
#include "flatcs/runner.hpp"
