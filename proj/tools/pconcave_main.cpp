#include <cstdio>

int main() {
    std::puts("pconcave: not wired up yet");
    return 1;
}
