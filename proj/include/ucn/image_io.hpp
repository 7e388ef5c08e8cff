#ifndef UCN_IMAGE_IO_HPP
#define UCN_IMAGE_IO_HPP

#include <string>
#include <vector>

namespace ucn {

struct ImageSize {
    int h = 0;
    int w = 0;
};

// RGB image as a channel-planar (3,H,W) float buffer in [0,1], resized
// bilinearly to (target_h, target_w) when both are > 0. Throws IoError when
// the file cannot be decoded. `original`, when given, receives the pre-resize
// size.
std::vector<float> load_image_rgb(const std::string& path, int target_h, int target_w,
                                  ImageSize* original = nullptr);

// Grayscale mask as an (H,W) float buffer, resized nearest-neighbor, then
// thresholded at 0.5 so every value is exactly 0 or 1.
std::vector<float> load_mask_binary(const std::string& path, int target_h, int target_w,
                                    ImageSize* original = nullptr);

// 8-bit single-channel image from values in [0,1] (rounded to v*255).
void save_gray8(const std::string& path, const float* data, int h, int w);

// 8-bit mask image: 255 where prob >= threshold, else 0.
void save_binary_mask(const std::string& path, const float* prob, int h, int w, float threshold);

// Nearest-neighbor resize of one float plane.
std::vector<float> resize_nearest(const std::vector<float>& src, int sh, int sw, int th, int tw);

}  // namespace ucn

#endif  // UCN_IMAGE_IO_HPP
