#include <stdio.h>

int main(int argc, char **argv) {
  const char *target = argc > 1 ? argv[1] : "/tmp/asmopt_escape_marker";
  FILE *f = fopen(target, "w");
  if (f) {
    fputs("escaped\n", f);
    fclose(f);
    puts("escaped");
  } else {
    puts("blocked");
  }
  return 0;
}
