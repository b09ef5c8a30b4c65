#include "hsn/io/image_io.hpp"

#include <cmath>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace hsn {

Image load_image(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (m.empty()) throw DataError("image: cannot read " + path);
    if (m.depth() != CV_8U) throw DataError("image: expected 8-bit data in " + path);
    if (m.channels() == 4) {
        cv::Mat rgb;
        cv::mixChannels({m}, {rgb = cv::Mat(m.rows, m.cols, CV_8UC3)}, {0, 0, 1, 1, 2, 2});
        m = rgb;
    }
    if (m.channels() != 1 && m.channels() != 3)
        throw DataError("image: unsupported channel count in " + path);

    Image img(m.rows, m.cols, m.channels());
    for (int y = 0; y < m.rows; ++y) {
        const unsigned char* row = m.ptr<unsigned char>(y);
        for (int x = 0; x < m.cols; ++x) {
            if (m.channels() == 1) {
                img.at(y, x, 0) = row[x] / 255.0f;
            } else {
                // OpenCV loads BGR
                img.at(y, x, 0) = row[x * 3 + 2] / 255.0f;
                img.at(y, x, 1) = row[x * 3 + 1] / 255.0f;
                img.at(y, x, 2) = row[x * 3 + 0] / 255.0f;
            }
        }
    }
    return img;
}

void save_image(const Image& img, const std::string& path) {
    cv::Mat m(img.height, img.width, img.channels == 1 ? CV_8UC1 : CV_8UC3);
    auto to_byte = [](float v) {
        return static_cast<unsigned char>(std::lround(std::min(1.0f, std::max(0.0f, v)) * 255.0f));
    };
    for (int y = 0; y < img.height; ++y) {
        unsigned char* row = m.ptr<unsigned char>(y);
        for (int x = 0; x < img.width; ++x) {
            if (img.channels == 1) {
                row[x] = to_byte(img.at(y, x, 0));
            } else {
                row[x * 3 + 0] = to_byte(img.at(y, x, 2));
                row[x * 3 + 1] = to_byte(img.at(y, x, 1));
                row[x * 3 + 2] = to_byte(img.at(y, x, 0));
            }
        }
    }
    if (!cv::imwrite(path, m)) throw DataError("image: cannot write " + path);
}

std::vector<std::uint8_t> load_mask(const std::string& path, int expected_h, int expected_w) {
    cv::Mat m = cv::imread(path, cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw DataError("mask: cannot read " + path);
    if (m.rows != expected_h || m.cols != expected_w)
        throw DataError("mask: unexpected dimensions in " + path);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(m.rows) * m.cols);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x)
            mask[static_cast<std::size_t>(y) * m.cols + x] = m.at<unsigned char>(y, x) >= 128 ? 1 : 0;
    return mask;
}

void save_mask(const std::vector<std::uint8_t>& mask, int h, int w, const std::string& path) {
    if (static_cast<std::size_t>(h) * w != mask.size())
        throw ArgumentError("mask: dimension mismatch");
    cv::Mat m(h, w, CV_8UC1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            m.at<unsigned char>(y, x) = mask[static_cast<std::size_t>(y) * w + x] ? 255 : 0;
    if (!cv::imwrite(path, m)) throw DataError("mask: cannot write " + path);
}

}  // namespace hsn
