#pragma once

#include "diffsw/ad/primitive.hpp"

// Built-in primitive descriptors. Each has exact tangent and backward rules
// installed by Registry::with_builtins().
namespace diffsw::ad::prims {

const Primitive& add();        // a + b (same layout)
const Primitive& sub();        // a - b
const Primitive& mul();        // a * b elementwise
const Primitive& scale();      // s * f, s a 1x1 scalar
const Primitive& cmul();       // attrs.c * f
const Primitive& square();     // f * f
const Primitive& sqrt();       // elementwise sqrt; attrs.c carries the gradient clamp
const Primitive& laplacian();  // attrs.grid
const Primitive& ddx();        // attrs.grid
const Primitive& ddy();        // attrs.grid
const Primitive& interp();     // attrs.grid, attrs.to
const Primitive& upwind_x();   // (u, tracer) -> first-order upwind flux on u-faces
const Primitive& upwind_y();   // (v, tracer) -> first-order upwind flux on v-faces
const Primitive& cumsum_y();   // attrs.c * running sum from the southern row; u-face -> center
const Primitive& sum();        // all values -> 1x1 scalar

}  // namespace diffsw::ad::prims
