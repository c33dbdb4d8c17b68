import java.util.Scanner;

public class Main {
    static boolean isLeap(int year) {
        if (year % 400 == 0) {
            return true;
        }
        if (year % 100 == 0) {
            return false;
        }
        return year % 4 == 0;
    }

    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        int from = sc.nextInt();
        int to = sc.nextInt();
        int leap_count = 0;
        for (int y = from; y <= to; y++) {
            if (isLeap(y)) {
                leap_count++;
            }
        }
        System.out.println(leap_count);
    }
}
