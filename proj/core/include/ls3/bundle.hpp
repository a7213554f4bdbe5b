#pragma once

#include "ls3/classifier.hpp"
#include "ls3/dynamics.hpp"
#include "ls3/encoder.hpp"
#include "ls3/value.hpp"

namespace ls3 {

/// Everything the planner consults: encoder, latent dynamics, value, goal and
/// constraint estimators, and the safe set.
struct ModelBundle {
  EncoderModel encoder;
  DynamicsEnsemble dynamics;
  ValueEnsemble value;
  Classifier goal;
  Classifier constraint;
  SafeSetClassifier safe_set;
};

}  // namespace ls3
