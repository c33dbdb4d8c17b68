import java.util.Scanner;

public class Main {
    private static int waitTime(String color) {
        switch (color) {
            case "red":
                return 30;
            case "yellow":
                return 5;
            case "green":
                return 0;
            default:
                return -1;
        }
    }

    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        int n = sc.nextInt();
        int total_wait = 0;
        for (int i = 0; i < n; i++) {
            int w = waitTime(sc.next());
            if (w < 0) {
                continue;
            }
            total_wait += w;
        }
        System.out.println(total_wait);
    }
}
