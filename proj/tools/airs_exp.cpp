#include "airs/common.hpp"

#include <cstdio>

int main() {
    std::printf("airs %s\n", airs::kVersion);
    return 0;
}
