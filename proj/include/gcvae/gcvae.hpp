#pragma once

#include "checkpoint.hpp"
#include "copula.hpp"
#include "data.hpp"
#include "dist.hpp"
#include "errors.hpp"
#include "evalkit.hpp"
#include "experiment.hpp"
#include "generate.hpp"
#include "mixed.hpp"
#include "models.hpp"
#include "ndcore.hpp"
#include "nn.hpp"
#include "optim.hpp"
