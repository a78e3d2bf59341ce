#include "smorph/tensor.hpp"

namespace smorph {

Tensor to_tensor(const ImageCrop& img) {
    Tensor t(img.channels, img.height, img.width);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) t.at(c, y, x) = img.at(y, x, c);
    return t;
}

ImageCrop to_image(const Tensor& t) {
    ImageCrop img(t.h, t.w, t.c);
    for (int c = 0; c < t.c; ++c)
        for (int y = 0; y < t.h; ++y)
            for (int x = 0; x < t.w; ++x) img.at(y, x, c) = t.at(c, y, x);
    return img;
}

Tensor rot90(const Tensor& t, int quarter_turns) {
    int k = ((quarter_turns % 4) + 4) % 4;
    Tensor cur = t;
    for (int i = 0; i < k; ++i) {
        Tensor next(cur.c, cur.w, cur.h);
        for (int c = 0; c < cur.c; ++c)
            for (int y = 0; y < next.h; ++y)
                for (int x = 0; x < next.w; ++x)
                    next.at(c, y, x) = cur.at(c, x, cur.w - 1 - y);
        cur = std::move(next);
    }
    return cur;
}

Tensor vflip(const Tensor& t) {
    Tensor out(t.c, t.h, t.w);
    for (int c = 0; c < t.c; ++c)
        for (int y = 0; y < t.h; ++y)
            for (int x = 0; x < t.w; ++x) out.at(c, y, x) = t.at(c, t.h - 1 - y, x);
    return out;
}

}  // namespace smorph
