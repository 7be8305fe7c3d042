#include <cstdio>
int main() { std::puts("canardlab: work in progress"); return 0; }
