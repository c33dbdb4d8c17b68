import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        int day = sc.nextInt();
        String name;
        switch (day) {
            case 0:
                name = "SUN";
                break;
            case 1:
                name = "MON";
                break;
            case 2:
                name = "TUE";
                break;
            case 3:
                name = "WED";
                break;
            case 4:
                name = "THU";
                break;
            case 5:
                name = "FRI";
                break;
            default:
                name = "SAT";
        }
        System.out.println(name);
    }
}
