#include <iostream>

int main() {
  std::cout << "bleloc stub\n";
  return 0;
}
