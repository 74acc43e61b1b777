#pragma once

#include "wristvat/error.hpp"
#include "wristvat/ingest.hpp"
#include "wristvat/sigproc.hpp"
#include "wristvat/dynamics.hpp"
#include "wristvat/gait.hpp"
#include "wristvat/sleep.hpp"
#include "wristvat/model.hpp"
#include "wristvat/synth.hpp"
#include "wristvat/pipeline.hpp"
