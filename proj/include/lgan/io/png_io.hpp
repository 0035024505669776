#pragma once

#include <string>

#include "lgan/tensor/tensor.hpp"

namespace lgan::io {

// 8-bit PNG carriers for the on-disk formats: RGB images map [-1,1] to
// [0,255], grayscale masks map [0,1] to [0,255] (255 = inside).

void write_png_rgb(const std::string& path, const Tensor<float>& image);   // [3,H,W]
void write_png_gray(const std::string& path, const Tensor<float>& mask);   // [1,H,W] or [H,W]

Tensor<float> read_png_rgb(const std::string& path);   // -> [3,H,W]
Tensor<float> read_png_gray(const std::string& path);  // -> [1,H,W]

}  // namespace lgan::io
