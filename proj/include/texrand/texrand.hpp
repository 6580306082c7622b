#pragma once

#include "texrand/augment.hpp"
#include "texrand/erf_inv.hpp"
#include "texrand/error.hpp"
#include "texrand/feature_map.hpp"
#include "texrand/gtr.hpp"
#include "texrand/image.hpp"
#include "texrand/image_io.hpp"
#include "texrand/ltr.hpp"
#include "texrand/nn.hpp"
#include "texrand/paintings.hpp"
#include "texrand/pool_manifest.hpp"
#include "texrand/rng.hpp"
#include "texrand/tcps.hpp"
#include "texrand/tensor_file.hpp"
#include "texrand/trainer/config.hpp"
#include "texrand/trainer/losses.hpp"
#include "texrand/trainer/metrics.hpp"
#include "texrand/trainer/seg_model.hpp"
#include "texrand/trainer/sgd.hpp"
#include "texrand/trainer/toy_dataset.hpp"
#include "texrand/trainer/train.hpp"
