import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        int seconds = sc.nextInt();
        int h = seconds / 3600;
        int rest = seconds % 3600;
        int m = rest / 60;
        int s = rest % 60;
        System.out.println(h + ":" + m + ":" + s);
    }
}
