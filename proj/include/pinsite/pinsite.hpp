#ifndef PINSITE_PINSITE_HPP
#define PINSITE_PINSITE_HPP

#include "pinsite/augment.hpp"
#include "pinsite/blocks.hpp"
#include "pinsite/data.hpp"
#include "pinsite/explain.hpp"
#include "pinsite/image.hpp"
#include "pinsite/loss.hpp"
#include "pinsite/metrics.hpp"
#include "pinsite/model.hpp"
#include "pinsite/nn.hpp"
#include "pinsite/runconfig.hpp"
#include "pinsite/tensor.hpp"
#include "pinsite/train.hpp"

#endif
