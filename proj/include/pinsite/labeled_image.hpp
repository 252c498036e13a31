#ifndef PINSITE_LABELED_IMAGE_HPP
#define PINSITE_LABELED_IMAGE_HPP

#include <string>

#include "pinsite/image.hpp"
#include "pinsite/model.hpp"

namespace pinsite {

struct LabeledImage {
    std::string id; // filename stem, unique across the dataset
    Image image;
    PinLabel label = PinLabel::group_a;
};

} // namespace pinsite

#endif
