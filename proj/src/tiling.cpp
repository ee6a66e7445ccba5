#include "tessella/tiling.hpp"

#include <string>

#include "tessella/errors.hpp"

namespace tess {

TilePlan tile(int width, int height, const RunConfig& config) {
    validate_config(config);
    const int s = config.subimage;
    if (width < s || height < s)
        throw InputError("image " + std::to_string(width) + "x" + std::to_string(height) +
                         " smaller than one " + std::to_string(s) + "x" + std::to_string(s) +
                         " sub-image");

    TilePlan plan;
    plan.sub_cols = width / s;
    plan.sub_rows = height / s;
    plan.grid = config.patch_grid();
    const int per_sub = plan.grid * plan.grid;
    plan.patches.reserve(static_cast<std::size_t>(plan.sub_count()) * per_sub);

    for (int sr = 0; sr < plan.sub_rows; ++sr) {
        for (int sc = 0; sc < plan.sub_cols; ++sc) {
            const int sub_index = sr * plan.sub_cols + sc;
            for (int pr = 0; pr < plan.grid; ++pr) {
                for (int pc = 0; pc < plan.grid; ++pc) {
                    PatchRef ref;
                    ref.index.sub_row = sr;
                    ref.index.sub_col = sc;
                    ref.index.sub_index = sub_index;
                    ref.index.patch_row = pr;
                    ref.index.patch_col = pc;
                    ref.index.patch_index = pr * plan.grid + pc;
                    ref.index.global_id =
                        static_cast<long>(sub_index) * per_sub + ref.index.patch_index;
                    ref.x0 = sc * s + pc * config.stride;
                    ref.y0 = sr * s + pr * config.stride;
                    plan.patches.push_back(ref);
                }
            }
        }
    }
    return plan;
}

}  // namespace tess
