#include <cstdio>

int main() {
    std::puts("mmfp: placeholder");
    return 0;
}
