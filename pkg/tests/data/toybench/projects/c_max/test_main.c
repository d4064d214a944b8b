#include <stdio.h>
#include <string.h>

int mymax(int a, int b);

static int check_trigger(void) {
    if (mymax(2, 3) != 3) { printf("trigger: mymax(2,3) != 3\n"); return 1; }
    if (mymax(-1, 5) != 5) { printf("trigger: mymax(-1,5) != 5\n"); return 1; }
    return 0;
}

static int check_rest(void) {
    if (mymax(7, 7) != 7) { printf("rest: mymax(7,7) != 7\n"); return 1; }
    if (mymax(9, 4) != 9) { printf("rest: mymax(9,4) != 9\n"); return 1; }
    return 0;
}

int main(int argc, char **argv) {
    if (argc > 1 && strcmp(argv[1], "trigger") == 0) {
        return check_trigger();
    }
    if (check_trigger() != 0) {
        return 1;
    }
    return check_rest();
}
