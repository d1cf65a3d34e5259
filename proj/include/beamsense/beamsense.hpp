#pragma once

// Umbrella header.

#include "beamsense/beam.hpp"
#include "beamsense/detect.hpp"
#include "beamsense/errors.hpp"
#include "beamsense/io.hpp"
#include "beamsense/mc.hpp"
#include "beamsense/modes.hpp"
#include "beamsense/philox.hpp"
#include "beamsense/presets.hpp"
#include "beamsense/scenario.hpp"
#include "beamsense/spectrum.hpp"
#include "beamsense/validation.hpp"
