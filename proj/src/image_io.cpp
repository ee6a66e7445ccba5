#include "tessella/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "tessella/errors.hpp"

namespace tess {

namespace {

std::string stem_of(const std::string& path) {
    std::size_t slash = path.find_last_of("/\\");
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    std::size_t dot = base.find_last_of('.');
    if (dot != std::string::npos && dot > 0) base = base.substr(0, dot);
    return base;
}

}  // namespace

PanelImage load_panel(const std::string& path) {
    cv::Mat img = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (img.empty()) throw InputError("cannot read image: " + path);

    const int depth = img.depth();
    if (depth != CV_8U && depth != CV_16U)
        throw InputError("unsupported bit depth (want 8- or 16-bit): " + path);

    PanelImage out;
    out.id = stem_of(path);
    out.width = img.cols;
    out.height = img.rows;

    int ch = img.channels();
    if (ch == 4 || ch == 2) {
        out.warnings.push_back("alpha channel ignored: " + path);
    } else if (ch != 1 && ch != 3) {
        throw InputError("unsupported channel count " + std::to_string(ch) + ": " + path);
    }

    const double scale = depth == CV_8U ? 1.0 / 255.0 : 1.0 / 65535.0;
    out.r = Grid(img.rows, img.cols);
    out.g = Grid(img.rows, img.cols);
    out.b = Grid(img.rows, img.cols);

    // OpenCV decodes color images as BGR(A)
    for (int y = 0; y < img.rows; ++y) {
        for (int x = 0; x < img.cols; ++x) {
            double r, g, b;
            if (depth == CV_8U) {
                const unsigned char* p = img.ptr<unsigned char>(y) + static_cast<std::size_t>(x) * ch;
                if (ch >= 3) {
                    b = p[0] * scale;
                    g = p[1] * scale;
                    r = p[2] * scale;
                } else {
                    r = g = b = p[0] * scale;
                }
            } else {
                const std::uint16_t* p = img.ptr<std::uint16_t>(y) + static_cast<std::size_t>(x) * ch;
                if (ch >= 3) {
                    b = p[0] * scale;
                    g = p[1] * scale;
                    r = p[2] * scale;
                } else {
                    r = g = b = p[0] * scale;
                }
            }
            out.r(y, x) = r;
            out.g(y, x) = g;
            out.b(y, x) = b;
        }
    }
    return out;
}

void save_png(const std::string& path, const Grid& r, const Grid& g, const Grid& b) {
    if (!r.same_shape(g) || !r.same_shape(b)) throw ShapeError("save_png: plane shapes differ");
    if (r.rows() == 0 || r.cols() == 0) throw InputError("save_png: empty image");
    cv::Mat img(r.rows(), r.cols(), CV_8UC3);
    auto q = [](double v) {
        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        return static_cast<unsigned char>(v * 255.0 + 0.5);
    };
    for (int y = 0; y < r.rows(); ++y) {
        unsigned char* p = img.ptr<unsigned char>(y);
        for (int x = 0; x < r.cols(); ++x) {
            p[3 * x + 0] = q(b(y, x));
            p[3 * x + 1] = q(g(y, x));
            p[3 * x + 2] = q(r(y, x));
        }
    }
    if (!cv::imwrite(path, img)) throw InputError("cannot write image: " + path);
}

}  // namespace tess
