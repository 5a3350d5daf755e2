#include <cstdio>

int main() { std::puts("magnls placeholder"); return 0; }
