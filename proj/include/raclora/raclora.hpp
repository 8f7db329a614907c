#ifndef RACLORA_RACLORA_HPP
#define RACLORA_RACLORA_HPP

#include "raclora/errors.hpp"
#include "raclora/federated.hpp"
#include "raclora/linalg.hpp"
#include "raclora/objectives.hpp"
#include "raclora/optimizers.hpp"
#include "raclora/random.hpp"
#include "raclora/sketch.hpp"

#endif  // RACLORA_RACLORA_HPP
