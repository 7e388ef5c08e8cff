#include "ucn/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "ucn/tensor.hpp"

namespace ucn {

std::vector<float> load_image_rgb(const std::string& path, int target_h, int target_w,
                                  ImageSize* original) {
    cv::Mat img = cv::imread(path, cv::IMREAD_COLOR);
    if (img.empty()) throw IoError("cannot decode image: " + path);
    if (original) {
        original->h = img.rows;
        original->w = img.cols;
    }
    if (target_h > 0 && target_w > 0 && (img.rows != target_h || img.cols != target_w))
        cv::resize(img, img, cv::Size(target_w, target_h), 0, 0, cv::INTER_LINEAR);

    const int H = img.rows, W = img.cols;
    std::vector<float> out(static_cast<size_t>(3) * H * W);
    for (int y = 0; y < H; ++y) {
        const cv::Vec3b* row = img.ptr<cv::Vec3b>(y);
        for (int x = 0; x < W; ++x) {
            // OpenCV loads BGR; store planar RGB.
            out[static_cast<size_t>(0) * H * W + y * W + x] = row[x][2] / 255.0f;
            out[static_cast<size_t>(1) * H * W + y * W + x] = row[x][1] / 255.0f;
            out[static_cast<size_t>(2) * H * W + y * W + x] = row[x][0] / 255.0f;
        }
    }
    return out;
}

std::vector<float> load_mask_binary(const std::string& path, int target_h, int target_w,
                                    ImageSize* original) {
    cv::Mat img = cv::imread(path, cv::IMREAD_GRAYSCALE);
    if (img.empty()) throw IoError("cannot decode mask: " + path);
    if (original) {
        original->h = img.rows;
        original->w = img.cols;
    }
    if (target_h > 0 && target_w > 0 && (img.rows != target_h || img.cols != target_w))
        cv::resize(img, img, cv::Size(target_w, target_h), 0, 0, cv::INTER_NEAREST);

    const int H = img.rows, W = img.cols;
    std::vector<float> out(static_cast<size_t>(H) * W);
    for (int y = 0; y < H; ++y) {
        const uint8_t* row = img.ptr<uint8_t>(y);
        for (int x = 0; x < W; ++x) out[static_cast<size_t>(y) * W + x] = row[x] >= 128 ? 1.0f : 0.0f;
    }
    return out;
}

void save_gray8(const std::string& path, const float* data, int h, int w) {
    cv::Mat img(h, w, CV_8UC1);
    for (int y = 0; y < h; ++y) {
        uint8_t* row = img.ptr<uint8_t>(y);
        for (int x = 0; x < w; ++x) {
            float v = data[static_cast<size_t>(y) * w + x];
            v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
            row[x] = static_cast<uint8_t>(v * 255.0f + 0.5f);
        }
    }
    if (!cv::imwrite(path, img)) throw IoError("cannot write image: " + path);
}

void save_binary_mask(const std::string& path, const float* prob, int h, int w, float threshold) {
    cv::Mat img(h, w, CV_8UC1);
    for (int y = 0; y < h; ++y) {
        uint8_t* row = img.ptr<uint8_t>(y);
        for (int x = 0; x < w; ++x)
            row[x] = prob[static_cast<size_t>(y) * w + x] >= threshold ? 255 : 0;
    }
    if (!cv::imwrite(path, img)) throw IoError("cannot write image: " + path);
}

std::vector<float> resize_nearest(const std::vector<float>& src, int sh, int sw, int th, int tw) {
    std::vector<float> out(static_cast<size_t>(th) * tw);
    for (int y = 0; y < th; ++y) {
        int sy = static_cast<int>(static_cast<int64_t>(y) * sh / th);
        for (int x = 0; x < tw; ++x) {
            int sx = static_cast<int>(static_cast<int64_t>(x) * sw / tw);
            out[static_cast<size_t>(y) * tw + x] = src[static_cast<size_t>(sy) * sw + sx];
        }
    }
    return out;
}

}  // namespace ucn
